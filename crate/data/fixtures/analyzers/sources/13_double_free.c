#include <stdlib.h>
void drop(char *p, int again)
{
    free(p);
    if (again)
        free(p);
}
