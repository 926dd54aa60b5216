#include <stdio.h>
#include <stdlib.h>
void save(const char *path, const char *msg)
{
    FILE *fp = fopen(path, "w");
    if (!fp)
        return;
    fputs(msg, fp);
    fclose(fp);
    malloc(16);
}
