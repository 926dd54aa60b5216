#include <stdlib.h>
struct item { int id; };
int item_id(int want)
{
    struct item *it = NULL;
    if (want)
        return it->id;
    return 0;
}
