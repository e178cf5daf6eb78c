// Load-only page execution for instrumented (or plain) web apps under node.
// usage: node runner.js <manifest.json>
// manifest: {scripts: [{name, code}], trace: path|null, timeout_ms, after: code|null}
"use strict";
const fs = require("fs");
const vm = require("vm");
const util = require("util");

const manifest = JSON.parse(fs.readFileSync(process.argv[2], "utf8"));

function out(stream, args) {
  stream.write(util.format.apply(null, args) + "\n");
}

const sandbox = {
  console: {
    log: (...a) => out(process.stdout, a),
    info: (...a) => out(process.stdout, a),
    debug: (...a) => out(process.stdout, a),
    warn: (...a) => out(process.stderr, a),
    error: (...a) => out(process.stderr, a),
  },
  setTimeout, clearTimeout, setInterval, clearInterval, setImmediate, clearImmediate,
  queueMicrotask,
  fetch: typeof fetch === "function" ? fetch : undefined,
  URL, URLSearchParams, TextEncoder, TextDecoder,
};
const context = vm.createContext(sandbox);

// minimal browser surface: events, a forgiving DOM, storage
const BROWSER = `
(function (g) {
  class EventTarget {
    addEventListener(type, fn) { (this.__l || (this.__l = {}))[type] = ((this.__l || {})[type] || []).concat([fn]); }
    removeEventListener(type, fn) { if (this.__l && this.__l[type]) this.__l[type] = this.__l[type].filter(f => f !== fn); }
    dispatchEvent(ev) {
      if (typeof ev === "string") ev = { type: ev };
      ev.target = ev.target || this;
      ev.preventDefault = ev.preventDefault || function () {};
      ev.stopPropagation = ev.stopPropagation || function () {};
      const fns = (this.__l && this.__l[ev.type]) || [];
      for (const fn of fns) {
        try { fn.call(this, ev); } catch (e) { console.error("Uncaught", e && e.stack || e); }
      }
      const h = this["on" + ev.type];
      if (typeof h === "function") {
        try { h.call(this, ev); } catch (e) { console.error("Uncaught", e && e.stack || e); }
      }
      return true;
    }
  }
  const all = [];
  g.__runner_elements = all;
  class Element extends EventTarget {
    constructor(tag) {
      super();
      all.push(this);
      this.tagName = String(tag || "div").toUpperCase();
      this.children = []; this.childNodes = this.children; this.style = {}; this.dataset = {};
      this.attributes = {}; this.textContent = ""; this.innerHTML = ""; this.value = "";
      this.parentNode = null;
      const classes = new Set();
      this.classList = {
        add: (...c) => c.forEach(x => classes.add(x)), remove: (...c) => c.forEach(x => classes.delete(x)),
        toggle: (c) => classes.has(c) ? (classes.delete(c), false) : (classes.add(c), true),
        contains: (c) => classes.has(c),
      };
    }
    appendChild(c) { this.children.push(c); if (c) c.parentNode = this; return c; }
    append(...cs) { cs.forEach(c => this.appendChild(c)); }
    removeChild(c) { this.children = this.children.filter(x => x !== c); this.childNodes = this.children; return c; }
    remove() { if (this.parentNode) this.parentNode.removeChild(this); }
    setAttribute(k, v) { this.attributes[k] = String(v); }
    getAttribute(k) { return k in this.attributes ? this.attributes[k] : null; }
    querySelector() { return new Element("div"); }
    querySelectorAll() { return []; }
    getElementsByTagName() { return []; }
    getElementsByClassName() { return []; }
    click() { this.dispatchEvent({ type: "click" }); }
    focus() {}
    blur() {}
  }
  const byId = {};
  const doc = new Element("#document");
  doc.readyState = "loading";
  doc.cookie = "";
  doc.head = new Element("head");
  doc.body = new Element("body");
  doc.documentElement = new Element("html");
  doc.createElement = (t) => new Element(t);
  doc.createTextNode = (t) => { const e = new Element("#text"); e.textContent = t; return e; };
  doc.getElementById = (id) => byId[id] || (byId[id] = Object.assign(new Element("div"), { id: id }));
  doc.querySelector = (sel) => byId["?" + sel] || (byId["?" + sel] = new Element("div"));
  for (const m of ["addEventListener", "removeEventListener", "dispatchEvent"]) {
    g[m] = function () { return EventTarget.prototype[m].apply(g, arguments); };
  }
  g.EventTarget = EventTarget;
  g.Element = g.HTMLElement = Element;
  g.document = doc;
  g.window = g.self = g.globalThis = g;
  g.location = { href: "http://localhost/", protocol: "http:", host: "localhost", hostname: "localhost",
                 pathname: "/", search: "", hash: "", reload() {} };
  g.navigator = { userAgent: "lacuna-runner", language: "en" };
  const store = () => { const m = new Map(); return {
    getItem: (k) => m.has(k) ? m.get(k) : null, setItem: (k, v) => m.set(k, String(v)),
    removeItem: (k) => m.delete(k), clear: () => m.clear() }; };
  g.localStorage = store();
  g.sessionStorage = store();
  g.requestAnimationFrame = (fn) => setTimeout(() => fn(Date.now()), 16);
  g.alert = (m) => console.log("[alert]", m);
})(this);
`;
vm.runInContext(BROWSER, context, { filename: "<runner-browser>" });

// fire every registered listener and on* handler a few times, as a user might
const EXERCISE = `
(function () {
  for (var round = 0; round < 3; round++) {
    var targets = [window, document].concat(__runner_elements);
    targets.forEach(function (t) {
      var types = Object.keys(t.__l || {});
      Object.keys(t).forEach(function (k) {
        if (/^on[a-z]+$/.test(k) && typeof t[k] === "function" && types.indexOf(k.slice(2)) < 0) types.push(k.slice(2));
      });
      types.forEach(function (ty) {
        if (ty !== "DOMContentLoaded" && ty !== "load") t.dispatchEvent({ type: ty, key: "Enter" });
      });
    });
  }
})();
`;

let finished = false;
function finish(code) {
  if (finished) return;
  finished = true;
  if (manifest.trace) {
    const lines = context.__lacuna_trace || [];
    fs.writeFileSync(manifest.trace, lines.map(l => l + "\n").join(""));
  }
  process.exit(code || 0);
}

function run(code, name) {
  try {
    vm.runInContext(code, context, { filename: name });
  } catch (e) {
    process.stderr.write("Uncaught " + (e && e.stack || e) + "\n");
  }
}

process.on("uncaughtException", (e) => process.stderr.write("Uncaught " + (e && e.stack || e) + "\n"));
process.on("unhandledRejection", (e) => process.stderr.write("Unhandled rejection " + (e && e.stack || e) + "\n"));
process.on("beforeExit", () => finish(0));
setTimeout(() => finish(0), manifest.timeout_ms || 10000).unref();

for (const s of manifest.scripts) run(s.code, s.name);
context.document.readyState = "interactive";
run('document.dispatchEvent({type: "DOMContentLoaded"})', "<runner-events>");
context.document.readyState = "complete";
run('window.dispatchEvent({type: "load"})', "<runner-events>");
if (manifest.after) run(manifest.after, "<runner-after>");
if (manifest.exercise) setTimeout(() => run(EXERCISE, "<runner-exercise>"), manifest.exercise_delay_ms || 300);
