(function (global) {
  function $(id) {
    return document.getElementById(id);
  }
  function each(list, fn) {
    for (var i = 0; i < list.length; i++) fn(list[i], i);
  }
  function extend(target, source) {
    for (var k in source) target[k] = source[k];
    return target;
  }
  function ajax(url, done) {
    var xhr = new XMLHttpRequest();
    xhr.onload = function () { done(xhr.responseText); };
    xhr.open("GET", url);
    xhr.send();
  }
  function debounce(fn, ms) {
    var t;
    return function () {
      clearTimeout(t);
      t = setTimeout(fn, ms);
    };
  }
  function on(el, type, handler) {
    el.addEventListener(type, handler);
  }
  global.MiniLib = { $: $, each: each, extend: extend, ajax: ajax, debounce: debounce, on: on };
})(window);
