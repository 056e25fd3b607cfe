int main() {
  int n, r, c, best;
  scanf("%d", &n);
  int t[n][n];
  int s[n][n];
  for (r = 0; r < n; r++)
    for (c = 0; c <= r; c++)
      scanf("%d", &t[r][c]);
  s[0][0] = t[0][0];
  for (r = 1; r < n; r++)
    for (c = 0; c <= r; c++) {
      if (c == 0) s[r][c] = s[r-1][c] + t[r][c];
      else if (c == r) s[r][c] = s[r-1][c-1] + t[r][c];
      else s[r][c] = t[r][c] + (s[r-1][c] > s[r-1][c-1] ? s[r-1][c] : s[r-1][c-1]);
    }
  best = s[n-1][0];
  for (c = 1; c < n; c++)
    if (s[n-1][c] > best) best = s[n-1][c];
  printf("%d", best);
  return 0;
}
