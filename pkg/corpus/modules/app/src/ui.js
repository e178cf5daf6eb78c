var UI = {
  logChange: function (key, value) {
    console.log(key + " -> " + value);
  },
  render: function () {
    document.getElementById("settings").textContent = "theme=" + Store.get("theme");
  },
  toggleTheme: function () {
    Store.set("theme", Store.get("theme") === "dark" ? "light" : "dark");
  },
  showHelp: function () {
    console.log("help");
  }
};

Store.subscribe(UI.logChange);
Store.subscribe(function () { UI.render(); });
Store.set("theme", "dark");
Store.set("fontSize", 14);
