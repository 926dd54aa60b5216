short shrink(long big)
{
    int x = big;
    short s = x;
    return s;
}
