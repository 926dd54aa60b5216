void list_free(node_t *head)
{
    node_t *next;
    while (head) {
        next = head->next;
        free(head->payload);
        free(head);
        head = next;
    }
}
