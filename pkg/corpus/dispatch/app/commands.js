var editor = { text: "hello world", saved: false };

function save() {
  this.saved = true;
  console.log("saved: " + this.text);
}

function upper() {
  this.text = this.text.toUpperCase();
  console.log("text: " + this.text);
}

function lower() {
  this.text = this.text.toLowerCase();
}

function wordCount(extra) {
  var n = this.text.split(" ").length + (extra || 0);
  console.log("words: " + n);
  return n;
}

function removeAll() {
  this.text = "";
}

var commands = {
  save: save,
  upper: upper,
  lower: lower,
  count: wordCount,
  clear: removeAll
};

function run(name) {
  var cmd = commands[name];
  if (cmd) cmd.call(editor);
}

function bootstrap() {
  commands.upper.call(editor);
  commands.count.apply(editor, [1]);
  var boundSave = save.bind(editor);
  document.getElementById("palette").addEventListener("keydown", function (ev) {
    if (ev.key === "Enter") boundSave();
  });
}

bootstrap();
