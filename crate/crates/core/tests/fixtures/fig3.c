int max(int a, int b) {
  return a > b ? a : b;
}
int max_arr(int arr[]) {
  int i, max;
  max = arr[0];
  for (i = 0; i < 100; i++)
    if (arr[i] > max) max = arr[i];
  return max;
}
int main() {
  int n, i, j, A[101][101], D[101][101]; // D is the DP array
  scanf("%d", &n);
  for (i = 0; i < n; i++)
    for (j = 0; j <= i; j++)
      scanf("%d", &A[i][j]);
  D[0][0] = A[0][0]; // Initialization
  for (i = 1; i < n; i++)
    for (j = 0; j <= i; j++)
      D[i][j] = A[i][j] + max(D[i-1][j], D[i-1][j-1]); // Update
  int ans = max_arr(D[n-1]);
  printf("%d", ans);
  return 0;
}
