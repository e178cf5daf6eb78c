class Widget {
  constructor(name) {
    this.name = name;
    this.el = document.createElement("div");
  }

  mount(parent) {
    parent.appendChild(this.el);
    this.render();
    return this;
  }

  render() {
    this.el.textContent = this.name;
    console.log("render " + this.name);
  }

  destroy() {
    this.el.remove();
  }

  static create(name) {
    return new Widget(name);
  }
}

class Button extends Widget {
  constructor(name, onPress) {
    super(name);
    this.onPress = onPress;
    this.el.addEventListener("click", () => this.press());
  }

  press() {
    console.log("pressed " + this.name);
    this.onPress();
  }

  disable() {
    this.el.setAttribute("disabled", "true");
  }
}

class Slider extends Widget {
  constructor(name, min, max) {
    super(name);
    this.min = min;
    this.max = max;
  }

  render() {
    this.el.textContent = this.name + " " + this.min + ".." + this.max;
  }
}
