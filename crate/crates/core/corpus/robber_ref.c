int main() {
  int n, i;
  scanf("%d", &n);
  int a[n+1], dp[n+1];
  for (i = 1; i <= n; i++)
    scanf("%d", &a[i]);
  dp[0] = 0;
  dp[1] = a[1];
  for (i = 2; i <= n; i++) {
    if (dp[i-1] > dp[i-2] + a[i])
      dp[i] = dp[i-1];
    else
      dp[i] = dp[i-2] + a[i];
  }
  printf("%d", dp[n]);
  return 0;
}
