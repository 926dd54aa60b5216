int classify(int v)
{
    if (v > 10) {
        if (v > 5)
            return 1;
        return 2;
    }
    if (v == v)
        return 3;
    return 0;
}
