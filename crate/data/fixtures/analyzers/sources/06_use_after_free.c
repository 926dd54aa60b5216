#include <stdlib.h>
int release(int *p)
{
    free(p);
    return *p;
}
