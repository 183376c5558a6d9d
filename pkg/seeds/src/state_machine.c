enum { S_IDLE, S_NUM, S_IDENT, S_OP, S_ERR };
int lex(const char *s) {
  int st = S_IDLE, tokens = 0;
  for (; *s; s++) {
    char c = *s;
    switch (st) {
      case S_IDLE: if (c >= '0' && c <= '9') st = S_NUM; else if (c >= 'a' && c <= 'z') st = S_IDENT; else if (c == '+' || c == '*') st = S_OP; else if (c != ' ') st = S_ERR; break;
      case S_NUM: if (c < '0' || c > '9') { tokens++; st = c == ' ' ? S_IDLE : S_OP; } break;
      case S_IDENT: if (c < 'a' || c > 'z') { tokens++; st = c == ' ' ? S_IDLE : S_OP; } break;
      case S_OP: tokens++; st = (c >= '0' && c <= '9') ? S_NUM : S_IDLE; break;
      default: return -1;
    }
  }
  return tokens + (st != S_IDLE);
}
int run(void) { return lex("abc + 12 * x3 + 7") * 100 + lex("1+2"); }
