var ops = {
  add: function (a, b) { return a + b; },
  sub: function (a, b) { return a - b; },
  mul: function (a, b) { return a * b; },
  div: function (a, b) { return b === 0 ? NaN : a / b; },
  mod: function (a, b) { return a % b; },
  pow: function (a, b) { return Math.pow(a, b); }
};

var display = {
  value: 0,
  show: function (v) {
    this.value = v;
    document.getElementById("display").textContent = String(v);
    console.log("display: " + v);
  },
  blink: function () {
    this.show("");
  }
};

var history = {
  entries: [],
  push: function (entry) { this.entries.push(entry); },
  undo: function () { return this.entries.pop(); }
};

function evaluate(a, op, b) {
  var result;
  if (op === "+") result = ops.add(a, b);
  else if (op === "-") result = ops.sub(a, b);
  else result = ops.mul(a, b);
  history.push([a, op, b, result]);
  display.show(result);
  return result;
}

function applyNamed(name, a, b) {
  // the operation name comes from the button id at run time
  display.show(ops[name](a, b));
}

document.getElementById("eq").addEventListener("click", function () {
  evaluate(6, "*", 7);
});
document.getElementById("mod").addEventListener("click", function (ev) {
  applyNamed(ev.target.id, 17, 5);
});

evaluate(2, "+", 3);
evaluate(9, "-", 4);
