int ctx_reset(ctx_t *c)
{
    if (c == NULL)
        return -1;
    c->count = 0;
    c->flags &= ~CTX_DIRTY;
    memset(c->data, 0, c->cap);
    return 0;
}
