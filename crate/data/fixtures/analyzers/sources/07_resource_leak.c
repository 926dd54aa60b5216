#include <stdio.h>
int first_byte(const char *path)
{
    FILE *fp = fopen(path, "rb");
    if (fp == NULL)
        return -1;
    int c = fgetc(fp);
    if (c == EOF)
        return -2;
    fclose(fp);
    return c;
}
