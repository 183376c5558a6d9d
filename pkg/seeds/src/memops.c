static unsigned char src[256], dst[256];
void *mcpy(void *d, const void *s, unsigned long n) { return __builtin_memcpy(d, s, n); }
void *mset(void *d, int c, unsigned long n) { return __builtin_memset(d, c, n); }
void *mmove(void *d, const void *s, unsigned long n) { return __builtin_memmove(d, s, n); }
unsigned sum(const unsigned char *p, int n) { unsigned s = 0; while (n--) s += *p++; return s; }
unsigned short load16(const unsigned char *p) { return (unsigned short)(p[0] | p[1] << 8); }
unsigned run(void) { for (int i = 0; i < 256; i++) src[i] = (unsigned char)i; mcpy(dst, src, 200); mset(dst + 10, 7, 20); mmove(dst + 1, dst, 100); return sum(dst, 256) + load16(dst + 3); }
