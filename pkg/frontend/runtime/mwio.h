/* Stdout helpers supplied by the bundled freestanding runtime. */
#ifndef MPIWASM_MWIO_H
#define MPIWASM_MWIO_H

void print_str(const char *s);
void print_kv(const char *key, int value);

#endif /* MPIWASM_MWIO_H */
