unsigned long long fib64(int n) { unsigned long long a = 0, b = 1; while (n-- > 0) { unsigned long long t = a + b; a = b; b = t; } return a; }
long long sdiv64(long long a, long long b) { return b ? a / b : 0; }
unsigned long long udiv64(unsigned long long a, unsigned long long b) { return b ? a % b : 0; }
long long shifts(long long v, int s) { return (v << (s & 63)) ^ (v >> (s & 63)) ^ (long long)((unsigned long long)v >> (s & 63)); }
int cmp64(long long a, long long b) { return (a < b) - (a > b) + ((unsigned long long)a < (unsigned long long)b); }
unsigned long long mulhi(unsigned long long a, unsigned long long b) {
  unsigned long long al = a & 0xffffffff, ah = a >> 32, bl = b & 0xffffffff, bh = b >> 32;
  unsigned long long m = (al * bl >> 32) + ah * bl; return ah * bh + (m >> 32) + ((m & 0xffffffff) + al * bh >> 32);
}
long long run(void) { return (long long)fib64(80) + sdiv64(-1000000000000LL, 7) + (long long)udiv64(~0ULL, 13) + shifts(-12345, 9) + cmp64(-1, 1) + (long long)mulhi(~0ULL, 3); }
