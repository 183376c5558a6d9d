int imin(int a, int b) { return a < b ? a : b; }
int imax(int a, int b) { return a > b ? a : b; }
unsigned umin(unsigned a, unsigned b) { return a < b ? a : b; }
long long lmax(long long a, long long b) { return a > b ? a : b; }
int iabs(int a) { return a < 0 ? -a : a; }
int sign(int a) { return (a > 0) - (a < 0); }
int clamp(int v, int lo, int hi) { return imin(imax(v, lo), hi); }
double dsel(double a, double b, int c) { return c ? a : b; }
int run(void) { return imin(3, -4) + imax(9, 2) + (int)umin(5u, 7u) + (int)lmax(-9, 4) + iabs(-17) + sign(-3) + clamp(99, 0, 50) + (int)dsel(1.5, 2.5, 0); }
