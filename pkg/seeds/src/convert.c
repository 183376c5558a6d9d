int f2i(float f) { return (int)f; }
unsigned d2u(double d) { return (unsigned)d; }
long long d2l(double d) { return (long long)d; }
double l2d(long long v) { return (double)v; }
float u2f(unsigned v) { return (float)v; }
double f2d(float f) { return f; }
float d2f(double d) { return (float)d; }
int sext8(int v) { return (signed char)v; }
long long sext32(int v) { return v; }
unsigned long long zext32(unsigned v) { return v; }
int trunc64(long long v) { return (int)v; }
unsigned bits_of(float f) { union { float f; unsigned u; } x; x.f = f; return x.u; }
double from_bits(unsigned long long u) { union { double d; unsigned long long u; } x; x.u = u; return x.d; }
double run(void) { return f2i(3.7f) + d2u(9.9) + d2l(-1e10) + l2d(1LL << 40) + u2f(7u) + f2d(0.5f) + d2f(1.25) + sext8(200) + sext32(-5) + zext32(5) + trunc64(1LL << 33) + bits_of(1.0f) + from_bits(0x3ff0000000000000ULL); }
