var PHOTOS = [
  { title: "Harbour", year: 2019, tags: ["sea", "boats"] },
  { title: "Ridge", year: 2021, tags: ["mountain"] },
  { title: "Market", year: 2018, tags: ["city", "food"] },
  { title: "Dunes", year: 2022, tags: ["desert"] }
];

function byYear(a, b) { return a.year - b.year; }
function byTitle(a, b) { return a.title < b.title ? -1 : 1; }
function isRecent(p) { return p.year >= 2019; }
