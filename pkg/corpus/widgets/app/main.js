function onSave() {
  console.log("saved");
}

function onReset() {
  console.log("reset");
}

var root = document.getElementById("root");
Widget.create("title").mount(root);
new Button("save", onSave).mount(root);
