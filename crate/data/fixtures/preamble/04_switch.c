static int opcode_width(int op)
{
    switch (op) {
    case OP_NOP:
        return 1;
    case OP_PUSH:
        return 1 + WORD_SIZE;
    case OP_JMP:
        return 3;
    }
    return g_default_width;
}
