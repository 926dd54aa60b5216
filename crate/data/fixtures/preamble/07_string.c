char *dup_name(const char *src, size_t max)
{
    size_t n = strnlen(src, max);
    char *p = malloc(n + 1);
    if (p == NULL)
        return NULL;
    memcpy(p, src, n);
    p[n] = '\0';
    return p;
}
