static int data[64];
static short shorts[32];
static unsigned char bytes[128];
void fill(int n) { for (int i = 0; i < n && i < 64; i++) data[i] = i * i - 3 * i; }
int sum(int n) { int s = 0; for (int i = 0; i < n && i < 64; i++) s += data[i]; return s; }
void bsort(int n) {
  for (int i = 0; i < n; i++)
    for (int j = 0; j + 1 < n - i; j++)
      if (data[j] > data[j + 1]) { int t = data[j]; data[j] = data[j + 1]; data[j + 1] = t; }
}
int shorts_sum(void) { int s = 0; for (int i = 0; i < 32; i++) { shorts[i] = (short)(i * 1000); s += shorts[i]; } return s; }
unsigned checksum(void) { unsigned c = 0; for (int i = 0; i < 128; i++) { bytes[i] = (unsigned char)(i * 7); c = (c << 1) ^ bytes[i]; } return c; }
int run(void) { fill(40); bsort(40); return sum(40) + data[3] + shorts_sum() + (int)checksum(); }
