typedef int fix16;
fix16 fmul(fix16 a, fix16 b) { return (fix16)(((long long)a * b) >> 16); }
fix16 fdiv(fix16 a, fix16 b) { return b ? (fix16)(((long long)a << 16) / b) : 0x7fffffff; }
fix16 fsqrt(fix16 x) { unsigned r = 0, b = 1u << 30, q = (unsigned)x; while (b > q) b >>= 2; while (b) { if (q >= r + b) { q -= r + b; r = (r >> 1) + b; } else r >>= 1; b >>= 2; } return (fix16)(r << 8); }
fix16 fsin(fix16 x) { fix16 x2 = fmul(x, x); return x - fmul(x, x2) / 6 + fmul(fmul(x, x2), x2) / 120; }
int run(void) { return fmul(3 << 16, 5 << 15) + fdiv(1 << 16, 3 << 16) + fsqrt(2 << 16) + fsin(1 << 15); }
