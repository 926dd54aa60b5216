int pick(int flag)
{
    int v;
    if (flag > 0)
        v = 1;
    return v;
}
