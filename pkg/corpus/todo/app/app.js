var items = [];

function formatItem(text, index) {
  return (index + 1) + ". " + text;
}

function render() {
  var list = document.getElementById("list");
  list.innerHTML = "";
  for (var i = 0; i < items.length; i++) {
    var li = document.createElement("li");
    li.textContent = formatItem(items[i], i);
    list.appendChild(li);
  }
  console.log("rendered " + items.length + " items");
}

function addTodo(text) {
  if (!text) return;
  items.push(text);
  render();
}

function removeTodo(index) {
  items.splice(index, 1);
  render();
}

function clearCompleted() {
  items = [];
  render();
}

function exportCsv() {
  return items.map(function (t) { return '"' + t + '"'; }).join(",");
}

function debugDump() {
  console.log(JSON.stringify(items));
}

function onAdd() {
  var input = document.getElementById("new-item");
  addTodo(input.value || "untitled");
  input.value = "";
}

function init() {
  document.getElementById("add").addEventListener("click", onAdd);
  addTodo("buy milk");
  addTodo("write report");
}

init();
