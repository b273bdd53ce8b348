/*
 * Minimal freestanding runtime for wasm32 guests built with -nostdlib.
 * Provides program startup, a bump allocator, the mem* routines clang
 * may emit calls to, and the tiny stdout helpers declared in mwio.h.
 */

__attribute__((import_module("wasi_snapshot_preview1"), import_name("proc_exit")))
void __mw_proc_exit(int code);
__attribute__((import_module("wasi_snapshot_preview1"), import_name("fd_write")))
int __mw_fd_write(int fd, const void *iovs, int iovs_len, int *nwritten);

extern unsigned char __heap_base;
static unsigned long heap_top;

void *malloc(unsigned long n) {
    if (!heap_top) heap_top = (unsigned long)&__heap_base;
    unsigned long p = (heap_top + 15) & ~15UL;
    heap_top = p + n;
    return (void *)p;
}

void free(void *p) { (void)p; }

void *memcpy(void *d, const void *s, unsigned long n) {
    unsigned char *dd = d;
    const unsigned char *ss = s;
    while (n--) *dd++ = *ss++;
    return d;
}

void *memset(void *d, int c, unsigned long n) {
    unsigned char *dd = d;
    while (n--) *dd++ = (unsigned char)c;
    return d;
}

int main(void);
void _start(void) { __mw_proc_exit(main()); }

void print_str(const char *s) {
    unsigned long n = 0;
    while (s[n]) n++;
    struct { const char *base; unsigned long len; } iov = { s, n };
    int written;
    __mw_fd_write(1, &iov, 1, &written);
}

/* Prints "key=value\n" with a decimal (possibly negative) value. */
void print_kv(const char *key, int value) {
    char digits[12];
    int i = 0;
    unsigned int u = value < 0 ? 0u - (unsigned int)value : (unsigned int)value;
    do {
        digits[i++] = (char)('0' + u % 10u);
        u /= 10u;
    } while (u);
    if (value < 0) digits[i++] = '-';

    char line[64];
    int n = 0;
    while (key[n] && n < 40) {
        line[n] = key[n];
        n++;
    }
    line[n++] = '=';
    while (i) line[n++] = digits[--i];
    line[n++] = '\n';
    line[n] = '\0';
    print_str(line);
}
