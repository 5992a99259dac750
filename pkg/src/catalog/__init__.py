"""语料目录：录音生命周期、故事单元与失效追踪"""
