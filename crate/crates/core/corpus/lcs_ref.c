int main() {
  int n, m, i, j;
  scanf("%d", &n);
  scanf("%d", &m);
  int a[n+1], b[m+1], dp[n+1][m+1];
  for (i = 1; i <= n; i++)
    scanf("%d", &a[i]);
  for (j = 1; j <= m; j++)
    scanf("%d", &b[j]);
  for (i = 0; i <= n; i++)
    dp[i][0] = 0;
  for (j = 0; j <= m; j++)
    dp[0][j] = 0;
  for (i = 1; i <= n; i++)
    for (j = 1; j <= m; j++) {
      if (a[i] == b[j])
        dp[i][j] = dp[i-1][j-1] + 1;
      else if (dp[i-1][j] >= dp[i][j-1])
        dp[i][j] = dp[i-1][j];
      else
        dp[i][j] = dp[i][j-1];
    }
  printf("%d", dp[n][m]);
  return 0;
}
