#include <stdlib.h>
long *table(int rows, int cols)
{
    long *t = malloc(rows * cols * sizeof(int));
    return t;
}
