var ball = { pos: new Vector(0, 0), vel: new Vector(2, 1) };
var mode = "playing";

var states = {
  playing: {
    update: function () {
      ball.pos = ball.pos.add(ball.vel);
    }
  },
  paused: {
    update: function () {
      console.log("paused");
    }
  }
};

function step() {
  states[mode].update();
  console.log("ball at " + ball.pos.x + "," + ball.pos.y);
}

function onKey(ev) {
  mode = mode === "playing" ? "paused" : "playing";
}

function resetBall() {
  ball.pos = new Vector(0, 0);
}

document.addEventListener("keydown", onKey);
new Loop(step, 4).start();
// demo mode pauses the game shortly after it starts
setTimeout(function () { onKey(); }, 30);
