int gcd(int a, int b) { while (b) { int t = a % b; a = b; b = t; } return a; }
unsigned lcm(unsigned a, unsigned b) { return a / (unsigned)gcd((int)a, (int)b) * b; }
int isqrt(int n) { int x = n, y = (x + 1) / 2; while (y < x) { x = y; y = (x + n / x) / 2; } return x; }
long long powmod(long long b, long long e, long long m) {
  long long r = 1; b %= m;
  while (e > 0) { if (e & 1) r = r * b % m; b = b * b % m; e >>= 1; }
  return r;
}
int collatz(unsigned n) { int s = 0; while (n != 1) { n = (n & 1) ? 3 * n + 1 : n / 2; s++; } return s; }
int run(void) { return gcd(84, 36) + (int)lcm(4, 6) + isqrt(1000) + (int)powmod(3, 200, 1000003) + collatz(27); }
