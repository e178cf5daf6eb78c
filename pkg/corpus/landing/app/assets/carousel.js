var slides = ["one", "two", "three"];
var current = 0;

function show(i) {
  console.log("slide " + slides[i]);
}

function next() {
  current = (current + 1) % slides.length;
  show(current);
}

function prev() {
  current = (current + slides.length - 1) % slides.length;
  show(current);
}

show(current);
setTimeout(next, 50);
