var readings = [
  { city: "Oslo", temp: 3 },
  { city: "Lisbon", temp: 19 },
  { city: "Cairo", temp: 31 }
];

function describe(r) {
  return r.city + ": " + r.temp + "C";
}

function renderCard() {
  var lines = [];
  MiniLib.each(readings, function (r) {
    lines.push(describe(r));
  });
  MiniLib.$("card").textContent = lines.join(", ");
  console.log(lines.join(", "));
}

function toFahrenheit(c) {
  return c * 9 / 5 + 32;
}

function refresh() {
  readings.forEach(function (r) { r.temp += 1; });
  renderCard();
}

MiniLib.on(MiniLib.$("refresh"), "click", refresh);
renderCard();
