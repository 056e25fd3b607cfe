int main() {
  int n, m, i, j;
  scanf("%d", &n);
  scanf("%d", &m);
  int g[n][m], dp[n][m];
  for (i = 0; i < n; i++)
    for (j = 0; j < m; j++)
      scanf("%d", &g[i][j]);
  dp[0][0] = g[0][0];
  for (j = 1; j < m; j++)
    dp[0][j] = dp[0][j-1] + g[0][j];
  for (i = 1; i < n; i++)
    dp[i][0] = dp[i-1][0] + g[i][0];
  for (i = 1; i < n; i++)
    for (j = 1; j < m; j++) {
      if (dp[i-1][j] < dp[i][j-1])
        dp[i][j] = dp[i-1][j] + g[i][j];
      else
        dp[i][j] = dp[i][j-1] + g[i][j];
    }
  printf("%d", dp[n-1][m-1]);
  return 0;
}
