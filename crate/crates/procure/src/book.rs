// Book chapters are included as doc-comments elsewhere; placeholder.
