int main() {
  int len, k, skip, take;
  scanf("%d", &len);
  int v[len+1];
  int f[len+1];
  for (k = 1; k <= len; k++)
    scanf("%d", &v[k]);
  f[0] = 0;
  f[1] = v[1];
  for (k = 2; k <= len; k++) {
    skip = f[k-1];
    take = f[k-2] + v[k];
    f[k] = skip >= take ? skip : take;
  }
  printf("%d\n", f[len]);
  return 0;
}
