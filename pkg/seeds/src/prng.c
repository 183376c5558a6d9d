static unsigned long long s[2] = { 0x9E3779B97F4A7C15ULL, 0xBF58476D1CE4E5B9ULL };
unsigned long long next(void) { unsigned long long s0 = s[0], s1 = s[1], r = s0 + s1; s1 ^= s0; s[0] = ((s0 << 55) | (s0 >> 9)) ^ s1 ^ (s1 << 14); s[1] = (s1 << 36) | (s1 >> 28); return r; }
unsigned lcg(unsigned x) { return x * 1664525u + 1013904223u; }
unsigned xorshift32(unsigned x) { x ^= x << 13; x ^= x >> 17; x ^= x << 5; return x; }
double uniform(void) { return (double)(next() >> 11) * (1.0 / 9007199254740992.0); }
int dice(int sides) { return (int)(next() % (unsigned)sides) + 1; }
double run(void) { unsigned x = 1; for (int i = 0; i < 10; i++) x = xorshift32(lcg(x)); return uniform() + dice(6) + x; }
