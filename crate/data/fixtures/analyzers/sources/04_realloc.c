#include <stdlib.h>
int grow(size_t n)
{
    char *buf = malloc(n);
    if (buf == NULL)
        return -1;
    buf = realloc(buf, n * 2);
    if (buf == NULL)
        return -1;
    buf[0] = 0;
    free(buf);
    return 0;
}
