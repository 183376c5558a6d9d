typedef int (*binop)(int, int);
static int add(int a, int b) { return a + b; }
static int sub(int a, int b) { return a - b; }
static int mul(int a, int b) { return a * b; }
static int band(int a, int b) { return a & b; }
static binop ops[] = { add, sub, mul, band };
int apply(int which, int a, int b) { return ops[which & 3](a, b); }
int classify(int v) {
  switch (v) { case 0: return 10; case 1: return 22; case 2: return 37; case 3: return 41; case 5: return 59; case 8: return 83; default: return -1; }
}
long long fold(int n) { long long acc = 0; for (int i = 0; i < n; i++) acc += apply(i, i, n - i) * classify(i % 9); return acc; }
long long run(void) { return fold(30); }
