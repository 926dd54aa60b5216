enum mode { MODE_A, MODE_B, MODE_C };
int weight(int m)
{
    int w = 0;
    switch (m) {
    case MODE_A:
        w = 1;
        break;
    case MODE_B:
        w = 2;
        break;
    }
    return w;
}
