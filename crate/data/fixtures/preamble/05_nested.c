int conn_flush(struct conn *c)
{
    int n;
    if (!c->st->ready)
        return 0;
    n = c->ops.send(c, c->buf, c->pending);
    if (n < 0)
        log_error("send failed: %d", n);
    c->pending -= n;
    return n;
}
