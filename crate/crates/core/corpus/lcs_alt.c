int max(int x, int y) {
  if (x > y) return x;
  return y;
}
int main() {
  int p, q, u, w;
  scanf("%d", &p);
  scanf("%d", &q);
  int s[p+1], t[q+1], L[p+1][q+1];
  for (u = 1; u <= p; u++)
    scanf("%d", &s[u]);
  for (w = 1; w <= q; w++)
    scanf("%d", &t[w]);
  for (u = 0; u <= p; u++)
    L[u][0] = 0;
  for (w = 0; w <= q; w++)
    L[0][w] = 0;
  for (u = 1; u <= p; u++)
    for (w = 1; w <= q; w++) {
      if (s[u] != t[w])
        L[u][w] = max(L[u-1][w], L[u][w-1]);
      else
        L[u][w] = L[u-1][w-1] + 1;
    }
  printf("%d", L[p][q]);
  return 0;
}
