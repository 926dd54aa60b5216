int grow(buffer_t *b, size_t need)
{
    if (b->len + need <= b->cap)
        return 0;
    b->data = realloc(b->data, b->cap * 2 + need);
    if (!b->data)
        return -ENOMEM;
    b->cap = b->cap * 2 + need;
    return 0;
}
