#define CAP 32
static int q[CAP]; static unsigned head, tail;
int push(int v) { if (tail - head == CAP) return 0; q[tail++ % CAP] = v; return 1; }
int pop(int *out) { if (tail == head) return 0; *out = q[head++ % CAP]; return 1; }
int size(void) { return (int)(tail - head); }
int drain(void) { int v, s = 0; while (pop(&v)) s = s * 31 + v; return s; }
int run(void) { for (int i = 0; i < 40; i++) push(i * i); int v; pop(&v); pop(&v); push(-5); return drain() + size() + v; }
