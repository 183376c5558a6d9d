static int v[48];
static void swap(int *a, int *b) { int t = *a; *a = *b; *b = t; }
static int part(int lo, int hi) { int p = v[hi], i = lo; for (int j = lo; j < hi; j++) if (v[j] < p) swap(&v[i++], &v[j]); swap(&v[i], &v[hi]); return i; }
void qsort_(int lo, int hi) { if (lo < hi) { int p = part(lo, hi); qsort_(lo, p - 1); qsort_(p + 1, hi); } }
void isort(int n) { for (int i = 1; i < n; i++) { int k = v[i], j = i - 1; while (j >= 0 && v[j] > k) { v[j + 1] = v[j]; j--; } v[j + 1] = k; } }
int bsearch_(int n, int key) { int lo = 0, hi = n - 1; while (lo <= hi) { int m = (lo + hi) >> 1; if (v[m] == key) return m; if (v[m] < key) lo = m + 1; else hi = m - 1; } return -1; }
int run(void) { for (int i = 0; i < 48; i++) v[i] = (i * 37) % 48; qsort_(0, 47); isort(48); return bsearch_(48, 17) + v[5]; }
