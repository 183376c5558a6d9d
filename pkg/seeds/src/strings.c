static const char msg[] = "the quick brown fox jumps over the lazy dog";
static char buf[96];
int slen(const char *s) { int n = 0; while (s[n]) n++; return n; }
void scopy(char *d, const char *s) { while ((*d++ = *s++)) {} }
int scmp(const char *a, const char *b) { while (*a && *a == *b) { a++; b++; } return (unsigned char)*a - (unsigned char)*b; }
void upper(char *s) { for (; *s; s++) if (*s >= 'a' && *s <= 'z') *s -= 32; }
unsigned hash(const char *s) { unsigned h = 2166136261u; while (*s) { h ^= (unsigned char)*s++; h *= 16777619u; } return h; }
int count(const char *s, char c) { int n = 0; for (; *s; s++) n += *s == c; return n; }
unsigned run(void) { scopy(buf, msg); upper(buf); return hash(buf) + slen(msg) + scmp(buf, msg) + count(msg, 'o'); }
