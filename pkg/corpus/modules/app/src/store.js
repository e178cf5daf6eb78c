var Store = (function () {
  var state = {};
  var listeners = [];

  function notify(key) {
    listeners.forEach(function (fn) { fn(key, state[key]); });
  }

  function get(key) {
    return state[key];
  }

  function set(key, value) {
    state[key] = value;
    notify(key);
  }

  function subscribe(fn) {
    listeners.push(fn);
  }

  function snapshot() {
    return JSON.parse(JSON.stringify(state));
  }

  function persist() {
    localStorage.setItem("settings", JSON.stringify(state));
  }

  return { get: get, set: set, subscribe: subscribe, snapshot: snapshot };
})();
