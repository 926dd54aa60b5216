#include <stdlib.h>
#include <string.h>
int copy_name(const char *s)
{
    char *p = malloc(strlen(s) + 1);
    if (p == NULL)
        return -1;
    strcpy(p, s);
    if (p[0] == '#')
        return 1;
    free(p);
    return 0;
}
