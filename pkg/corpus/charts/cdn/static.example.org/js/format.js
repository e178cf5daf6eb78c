function formatNumber(n) {
  return n.toLocaleString("en-US");
}

function formatCurrency(n, symbol) {
  return (symbol || "$") + formatNumber(n);
}

function formatPercent(n) {
  return Math.round(n * 100) + "%";
}
