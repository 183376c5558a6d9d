static unsigned long long bits[16];
void set(int i) { bits[i >> 6] |= 1ULL << (i & 63); }
void clr(int i) { bits[i >> 6] &= ~(1ULL << (i & 63)); }
int test(int i) { return (int)(bits[i >> 6] >> (i & 63)) & 1; }
int count(void) { int n = 0; for (int i = 0; i < 16; i++) n += __builtin_popcountll(bits[i]); return n; }
int first(void) { for (int i = 0; i < 16; i++) if (bits[i]) return i * 64 + __builtin_ctzll(bits[i]); return -1; }
void sieve(int n) { for (int i = 2; i < n; i++) set(i); for (int i = 2; i * i < n; i++) if (test(i)) for (int j = i * i; j < n; j += i) clr(j); }
int run(void) { sieve(1000); return count() * 1000 + first(); }
