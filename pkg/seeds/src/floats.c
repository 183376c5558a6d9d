double poly(double x) { return ((3.5 * x - 2.25) * x + 1.0) * x - 0.125; }
float lerp(float a, float b, float t) { return a + (b - a) * t; }
double newton_sqrt(double v) { double x = v > 1 ? v : 1; for (int i = 0; i < 20; i++) x = 0.5 * (x + v / x); return x; }
float clampf(float v, float lo, float hi) { return v < lo ? lo : (v > hi ? hi : v); }
double absdiff(double a, double b) { return __builtin_fabs(a - b); }
float fminmax(float a, float b) { return (a < b ? a : b) * 2.0f - (a > b ? a : b); }
double floorceil(double x) { return __builtin_floor(x) * __builtin_ceil(x) + __builtin_trunc(x) + __builtin_sqrt(x * x); }
double run(void) { return poly(1.5) + lerp(1, 3, 0.25f) + newton_sqrt(2) + clampf(7, 0, 5) + absdiff(3, 9) + fminmax(2, -1) + floorceil(-2.5); }
