int main() {
  int rows, cols, x, y;
  scanf("%d", &rows);
  scanf("%d", &cols);
  int cost[rows][cols];
  int best[rows][cols];
  for (x = 0; x < rows; x++)
    for (y = 0; y < cols; y++)
      scanf("%d", &cost[x][y]);
  best[0][0] = cost[0][0];
  for (y = 1; y <= cols - 1; y++)
    best[0][y] = cost[0][y] + best[0][y-1];
  for (x = 1; x <= rows - 1; x++)
    best[x][0] = cost[x][0] + best[x-1][0];
  for (x = 1; x < rows; x++)
    for (y = 1; y < cols; y++)
      best[x][y] = cost[x][y] + (best[x-1][y] <= best[x][y-1] ? best[x-1][y] : best[x][y-1]);
  printf("%d", best[rows-1][cols-1]);
  return 0;
}
