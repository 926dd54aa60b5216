int scale(int x)
{
    int y = x * 2;
    y = x * 3;
    int unused;
    unused = y + 1;
    return y;
}
