void main() {
  int i, j, n, max;
  scanf("%d", &n);
  int m[n][n], dp[n][n]; // dp is the DP array
  for (i = 0; i < n; i++)
    for (j = 0; j <= i; j++)
      scanf("%d", &m[i][j]);
  dp[0][0] = m[0][0]; // Initialization
  for (i = 1; i < n; i++) {
    for (j = 0; j <= i; j++) {
      if (j == 0)
        dp[i][j] = dp[i-1][j] + m[i][j]; // Update
      else if (j == i)
        dp[i][j] = dp[i-1][j-1] + m[i][j]; // Update
      else if (dp[i-1][j] > dp[i-1][j-1])
        dp[i][j] = dp[i-1][j] + m[i][j]; // Update
      else dp[i][j] = dp[i-1][j-1] + m[i][j]; // Update
    }
  }
  max = dp[n-1][0];
  for (i = 1; i < n; i++)
    if (dp[n-1][i] > max) max = dp[n-1][i];
  printf("%d", max);
}
