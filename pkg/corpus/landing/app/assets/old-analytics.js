function legacyBeacon(url) {
  var img = new Image();
  img.src = url;
}

function legacyTrack(name) {
  legacyBeacon("/pixel?e=" + encodeURIComponent(name));
}
