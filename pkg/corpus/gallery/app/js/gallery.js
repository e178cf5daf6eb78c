function thumbnail(photo) {
  return "[" + photo.title + " " + photo.year + "]";
}

function loadPhotos() {
  return new Promise(function (resolve) {
    setTimeout(function () { resolve(PHOTOS.slice()); }, 20);
  });
}

function renderGrid(photos) {
  var html = photos
    .filter(isRecent)
    .sort(byYear)
    .map(thumbnail)
    .join(" ");
  document.getElementById("grid").innerHTML = html;
  console.log(html);
  return photos;
}

function countTags(photos) {
  var total = photos.reduce(function (n, p) { return n + p.tags.length; }, 0);
  console.log("tags: " + total);
}

function slideshow(photos) {
  var i = 0;
  var timer = setInterval(function () {
    console.log("showing " + photos[i % photos.length].title);
    if (++i > photos.length) clearInterval(timer);
  }, 500);
}

function preload(photos) {
  photos.forEach(function (p) {
    var img = document.createElement("img");
    img.src = p.title + ".jpg";
  });
}

function reportError(err) {
  console.error("gallery failed", err);
}

requestAnimationFrame(function () {
  loadPhotos().then(renderGrid).then(countTags).catch(reportError);
});
