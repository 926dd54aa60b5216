int checksum(const unsigned char *buf, int len)
{
    int sum = 0;
    for (int i = 0; i < len; i++)
        sum = mix(sum, buf[i]);
    return finalize(sum);
}
