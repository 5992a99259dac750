"""标注流锚定、集成与修复传播包"""
