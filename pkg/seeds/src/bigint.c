#define N 8
typedef struct { unsigned d[N]; } big;
static big a, b, r;
void badd(big *o, const big *x, const big *y) { unsigned long long c = 0; for (int i = 0; i < N; i++) { c += (unsigned long long)x->d[i] + y->d[i]; o->d[i] = (unsigned)c; c >>= 32; } }
void bmul_small(big *o, const big *x, unsigned m) { unsigned long long c = 0; for (int i = 0; i < N; i++) { c += (unsigned long long)x->d[i] * m; o->d[i] = (unsigned)c; c >>= 32; } }
int bcmp_(const big *x, const big *y) { for (int i = N - 1; i >= 0; i--) if (x->d[i] != y->d[i]) return x->d[i] < y->d[i] ? -1 : 1; return 0; }
void bshl1(big *x) { unsigned carry = 0; for (int i = 0; i < N; i++) { unsigned nc = x->d[i] >> 31; x->d[i] = x->d[i] << 1 | carry; carry = nc; } }
unsigned run(void) { a.d[0] = 0xffffffffu; a.d[1] = 7; b.d[0] = 1; badd(&r, &a, &b); bmul_small(&r, &r, 1000003); bshl1(&r); return r.d[0] ^ r.d[1] ^ (unsigned)bcmp_(&a, &r); }
