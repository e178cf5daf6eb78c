function Vector(x, y) {
  this.x = x;
  this.y = y;
}

Vector.prototype.add = function (other) {
  return new Vector(this.x + other.x, this.y + other.y);
};

Vector.prototype.scale = function (k) {
  return new Vector(this.x * k, this.y * k);
};

Vector.prototype.length = function () {
  return Math.sqrt(this.x * this.x + this.y * this.y);
};

function Loop(step, frames) {
  this.step = step;
  this.frames = frames;
}

Loop.prototype.start = function () {
  var self = this;
  function tick() {
    self.step();
    if (--self.frames > 0) requestAnimationFrame(tick);
  }
  requestAnimationFrame(tick);
};

Loop.prototype.pause = function () {
  this.frames = 0;
};
